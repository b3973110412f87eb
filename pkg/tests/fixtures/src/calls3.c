/* Three-function call fixture, compiled by the cross toolchain.  twice and
 * diff stay out of line so main exercises real jal calls and stack frames. */

__attribute__((noinline)) int twice(int a) { return a + a; }

__attribute__((noinline)) int diff(int a, int b) { return a - b; }

int main(int argc) { return twice(argc) + diff(argc, 2); }
