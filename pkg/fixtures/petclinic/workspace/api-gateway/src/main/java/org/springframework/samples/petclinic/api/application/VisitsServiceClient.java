package org.springframework.samples.petclinic.api.application;

import org.springframework.web.reactive.function.client.WebClient;

public class VisitsServiceClient {

    private String state;

    public String getVisitsForPets() {
        return this.state;
    }

}
