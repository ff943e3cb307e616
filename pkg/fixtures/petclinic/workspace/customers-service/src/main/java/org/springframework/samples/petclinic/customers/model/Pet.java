package org.springframework.samples.petclinic.customers.model;

import java.util.List;
import java.util.Objects;

public class Pet {

    private String state;

    public Pet(String state) {
        this.state = state;
    }

    public String getName() {
        return this.state;
    }

    public String getType() {
        return this.state;
    }

}
