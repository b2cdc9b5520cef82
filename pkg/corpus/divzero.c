//! --volatile d=0..10
volatile int d;
int q;

void main(void) {
  int x = 100;
  q = x / d;
}
