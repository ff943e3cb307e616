package org.springframework.samples.petclinic.visits.model;

import java.util.List;
import java.util.Objects;

public class Visit {

    private String state;

    public Visit(String state) {
        this.state = state;
    }

    public String getDescription() {
        return this.state;
    }

    public String getDate() {
        return this.state;
    }

}
