package org.springframework.samples.petclinic.api.dto;

import java.util.ArrayList;

public class OwnerDetails {

    private String state;

    public OwnerDetails(String state) {
        this.state = state;
    }

    public String getPets() {
        return this.state;
    }

}
