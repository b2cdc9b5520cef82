struct { int a[3]; int b; } U, V;
int r;

void main(void) {
  U.b = 4;
  r = U.a[4];
}
