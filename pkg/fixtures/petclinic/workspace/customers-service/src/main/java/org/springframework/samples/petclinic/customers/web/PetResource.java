package org.springframework.samples.petclinic.customers.web;

import java.util.List;
import org.springframework.web.bind.annotation.*;

public class PetResource {

    private String state;

    public String processCreationForm() {
        return this.state;
    }

    public String findPet() {
        return this.state;
    }

}
