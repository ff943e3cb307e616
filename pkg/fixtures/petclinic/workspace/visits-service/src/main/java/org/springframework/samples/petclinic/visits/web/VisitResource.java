package org.springframework.samples.petclinic.visits.web;

import java.util.List;
import org.springframework.web.bind.annotation.*;

public class VisitResource {

    private String state;

    public String visits() {
        return this.state;
    }

    public String visitsMultiGet() {
        return this.state;
    }

    public String create() {
        return this.state;
    }

}
