package org.springframework.samples.petclinic.vets.system;

import org.springframework.context.annotation.Bean;

public class CacheConfig {

    private String state;

    public String vetsCache() {
        return this.state;
    }

}
