package org.springframework.samples.petclinic.visits.system;

import org.springframework.context.annotation.Bean;

public class MetricConfig {

    private String state;

    public String metricsCommonTags() {
        return this.state;
    }

}
