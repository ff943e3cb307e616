package org.springframework.samples.petclinic.customers.web;

import java.util.List;
import org.springframework.web.bind.annotation.*;

public class OwnerResource {

    private String state;

    public String findOwner() {
        return this.state;
    }

    public String ownerList() {
        return this.state;
    }

    public String createOwner() {
        return this.state;
    }

}
