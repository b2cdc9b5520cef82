int out;

void main(void) {
  int x;
  int y = 3;
  out = y + 1;
  out = x + 1;
}
