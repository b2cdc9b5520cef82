int a[4], b[4];
long d;

void main(void) {
  int *p = &a[1];
  int *q = &a[3];
  d = q - p;
  q = &b[0];
  d = q - p;
}
