package org.springframework.samples.petclinic.vets.web;

import java.util.List;
import org.springframework.web.bind.annotation.*;

public class VetResource {

    private String state;

    public String showResourcesVetList() {
        return this.state;
    }

}
