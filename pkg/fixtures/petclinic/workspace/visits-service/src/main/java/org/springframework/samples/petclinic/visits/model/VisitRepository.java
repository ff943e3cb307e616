package org.springframework.samples.petclinic.visits.model;

import java.util.List;
import java.util.Objects;

public class VisitRepository {

    private String state;

    public String findByPetId() {
        return this.state;
    }

    public String findByPetIdIn() {
        return this.state;
    }

    public String save() {
        return this.state;
    }

}
