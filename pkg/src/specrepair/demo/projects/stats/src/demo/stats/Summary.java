package demo.stats;

public final class Summary {
    private Summary() {
    }

    public static double mean(double[] xs) {
        if (xs.length == 0) {
            return 0.0;
        }
        double sum = 0.0;
        for (int i = 1; i < xs.length; i++) { // bug: skips the first element
            sum += xs[i];
        }
        return sum / xs.length;
    }

    public static double variance(double[] xs) {
        if (xs.length < 2) {
            return 0.0;
        }
        double m = mean(xs);
        double acc = 0.0;
        for (double x : xs) {
            acc += (x - m) * (x - m);
        }
        return acc / xs.length;
    }
}
