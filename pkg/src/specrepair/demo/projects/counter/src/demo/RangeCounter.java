package demo;

public class RangeCounter {
    private int hits;

    public RangeCounter() {
        this.hits = 0;
    }

    // Counts how many values fall inside [low, high], both ends included.
    public int countInRange(int[] values, int low, int high) {
        int count = 0;
        for (int v : values) {
            if (v > low && v <= high) { // bug: the lower bound is excluded
                count++;
            }
        }
        hits += count;
        return count;
    }

    public int totalHits() {
        return hits;
    }
}
