package org.springframework.samples.petclinic.vets.model;

import java.util.List;
import java.util.Objects;

public class Vet {

    private String state;

    public Vet(String state) {
        this.state = state;
    }

    public String getFirstName() {
        return this.state;
    }

    public String getSpecialties() {
        return this.state;
    }

    public String getNrOfSpecialties() {
        return this.state;
    }

}
