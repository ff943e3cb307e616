package org.springframework.samples.petclinic.customers.model;

import java.util.List;
import java.util.Objects;

public class PetRepository {

    private String state;

    public String findById() {
        return this.state;
    }

    public String findPetTypes() {
        return this.state;
    }

    public String save() {
        return this.state;
    }

}
