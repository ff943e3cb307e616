package org.springframework.samples.petclinic.api.application;

import org.springframework.web.reactive.function.client.WebClient;

public class CustomersServiceClient {

    private String state;

    public String getOwner() {
        return this.state;
    }

    public String getOwners() {
        return this.state;
    }

}
