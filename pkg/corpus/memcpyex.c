int target = 42;
int x;

void memcopy(void* dst, void* src, unsigned sz) {
  unsigned char* s = (unsigned char*) src;
  unsigned char* d = (unsigned char*) dst;
  unsigned i;
  for (i=0;i<sz;i++) d[i] = s[i];
}

int get(unsigned char* buf) {
  struct { int *p; int n; } S;
  memcopy(&S, buf+16, sizeof(S));
  return *(S.p);
}

void main(void) {
  unsigned char buf[24];
  int i;
  for (i=0;i<16;i++) buf[i] = i;
  *(int**)(buf+16) = &target;
  *(int*)(buf+20) = 7;
  x = get(buf);
}
