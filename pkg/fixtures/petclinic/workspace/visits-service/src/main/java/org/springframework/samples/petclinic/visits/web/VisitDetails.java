package org.springframework.samples.petclinic.visits.web;

import java.util.List;
import org.springframework.web.bind.annotation.*;

public class VisitDetails {

    private String state;

    public VisitDetails(String state) {
        this.state = state;
    }

    public String getItems() {
        return this.state;
    }

}
