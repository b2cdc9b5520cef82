int *keep;
int r;

void store(void) {
  int local = 5;
  keep = &local;
  r = *keep;
}

void main(void) {
  store();
  r = *keep;
}
