package org.springframework.samples.petclinic.vets.model;

import java.util.List;
import java.util.Objects;

public class VetRepository {

    private String state;

    public String findAll() {
        return this.state;
    }

}
