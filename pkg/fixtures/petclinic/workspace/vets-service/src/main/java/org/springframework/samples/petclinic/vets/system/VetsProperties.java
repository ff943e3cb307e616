package org.springframework.samples.petclinic.vets.system;

import org.springframework.context.annotation.Bean;

public class VetsProperties {

    private String state;

    public String getCacheTtl() {
        return this.state;
    }

}
