//! --volatile v=0..100000
volatile int v;
int acc;
short small;

void main(void) {
  int k = v;
  acc = k * 30000;
  small = (short)k;
}
