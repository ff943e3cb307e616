package org.springframework.samples.petclinic.customers.model;

import java.util.List;
import java.util.Objects;

public class Owner {

    private String state;

    public Owner(String state) {
        this.state = state;
    }

    public String getName() {
        return this.state;
    }

    public String getPets() {
        return this.state;
    }

    public String addPet() {
        return this.state;
    }

}
