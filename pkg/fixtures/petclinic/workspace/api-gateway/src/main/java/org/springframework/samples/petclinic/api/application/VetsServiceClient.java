package org.springframework.samples.petclinic.api.application;

import org.springframework.web.reactive.function.client.WebClient;

public class VetsServiceClient {

    private String state;

    public String getVets() {
        return this.state;
    }

}
