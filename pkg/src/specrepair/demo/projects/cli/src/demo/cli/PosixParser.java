package demo.cli;

import java.util.ArrayList;
import java.util.List;

public class PosixParser {
    private final Options options;
    private boolean eatTheRest;

    public PosixParser(Options options) {
        this.options = options;
    }

    public List<String> flatten(String[] arguments, boolean stopAtNonOption) {
        List<String> tokens = new ArrayList<>();
        eatTheRest = false;
        for (int i = 0; i < arguments.length; i++) {
            String token = arguments[i];
            if (eatTheRest) {
                tokens.add(token);
            } else if ("--".equals(token)) {
                tokens.add(token);
                eatTheRest = true;
            } else if (token.startsWith("--")) {
                tokens.add(token);
            } else if (token.startsWith("-") && token.length() > 1) {
                if (options.hasOption(token.substring(0, 2))) {
                    burst(token, tokens);
                } else if (stopAtNonOption) {
                    burst(token, tokens); // bug: splits even when option unknown
                } else {
                    tokens.add(token);
                }
            } else {
                tokens.add(token);
                if (stopAtNonOption) {
                    eatTheRest = true;
                }
            }
        }
        return tokens;
    }

    private void burst(String token, List<String> tokens) {
        for (int j = 1; j < token.length(); j++) {
            tokens.add("-" + token.charAt(j));
        }
    }
}
