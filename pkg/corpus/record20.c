struct rec { int a[4]; int *p; };

struct rec src, dst;
int target = 5;
int y;

void memcopy(void* dst, void* src, unsigned sz) {
  unsigned char* s = (unsigned char*) src;
  unsigned char* d = (unsigned char*) dst;
  unsigned i;
  for (i=0;i<sz;i++) d[i] = s[i];
}

void main(void) {
  int k;
  for (k=0;k<4;k++) src.a[k] = k * 10;
  src.p = &target;
p_before:
  memcopy(&dst, &src, sizeof(struct rec));
p_after:
  y = *dst.p;
}
