//! --volatile sel=0..1
volatile int sel;
int cell = 9;
int got;

void main(void) {
  int *p = 0;
  if (sel) p = &cell;
  if (p) got = *p;
  got = *p;
}
