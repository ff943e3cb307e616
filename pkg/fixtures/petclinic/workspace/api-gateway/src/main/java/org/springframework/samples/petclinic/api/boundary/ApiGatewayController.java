package org.springframework.samples.petclinic.api.boundary;

import reactor.core.publisher.Mono;

public class ApiGatewayController {

    private String state;

    public String getOwnerDetails() {
        return this.state;
    }

    public String getVets() {
        return this.state;
    }

    public String getVisits() {
        return this.state;
    }

}
