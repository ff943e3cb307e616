package org.springframework.samples.petclinic.visits.system;

import org.springframework.context.annotation.Bean;

public class VisitsProperties {

    private String state;

    public String getCacheTtl() {
        return this.state;
    }

}
