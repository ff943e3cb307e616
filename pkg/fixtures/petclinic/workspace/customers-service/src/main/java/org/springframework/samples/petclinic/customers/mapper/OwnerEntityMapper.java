package org.springframework.samples.petclinic.customers.mapper;

public class OwnerEntityMapper {

    private String state;

    public String map() {
        return this.state;
    }

}
