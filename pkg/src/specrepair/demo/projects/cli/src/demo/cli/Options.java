package demo.cli;

import java.util.HashSet;
import java.util.Set;

public class Options {
    private final Set<String> names = new HashSet<>();

    public Options addOption(String name) {
        names.add("-" + name);
        return this;
    }

    public boolean hasOption(String name) {
        return names.contains(name);
    }
}
