struct { int a[3]; int b; } U, V;
int r;

void main(void) {
  *(U.a+3) = 17;
  r = U.b;
p_read:
  *(V.a+2) = r;
}
