//! --volatile sel=0..2
volatile int sel;
int r;

int twice(int x) { return 2 * x; }
int inc(int x) { return x + 1; }

void main(void) {
  int (*f)(int);
  int s = sel;
  f = twice;
  if (s == 1) f = inc;
  r = f(20);
}
