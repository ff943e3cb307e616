package org.springframework.samples.petclinic.customers.model;

import java.util.List;
import java.util.Objects;

public class PetType {

    private String state;

    public PetType(String state) {
        this.state = state;
    }

    public String getName() {
        return this.state;
    }

}
