package org.springframework.samples.petclinic.vets.model;

import java.util.List;
import java.util.Objects;

public class Specialty {

    private String state;

    public Specialty(String state) {
        this.state = state;
    }

    public String getName() {
        return this.state;
    }

}
