unsigned char buf[40];
int sum;

void main(void) {
  unsigned char *p;
  int i;
  p = buf;
  for (i = 0; i < 10; i++) {
p_deref:
    *(int*)p = i;
    p = p + 4;
  }
  sum = *(int*)(buf + 36);
}
