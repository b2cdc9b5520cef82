//! --volatile in=3..900
volatile int in;
int a, b;

void memcopy(void* dst, void* src, unsigned sz) {
  unsigned char* s = (unsigned char*) src;
  unsigned char* d = (unsigned char*) dst;
  unsigned i;
  for (i=0;i<sz;i++) d[i] = s[i];
}

void main(void) {
  b = in;
  memcopy(&a, &b, 4);
p_after:
  b = a - b;
}
