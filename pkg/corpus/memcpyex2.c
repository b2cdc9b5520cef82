struct rec { int *p; int n; int a[3]; };

struct rec src, dst;
int target = 3;
int y;

void memcopy(void* dst, void* src, unsigned sz) {
  char* s = (char*) src;
  char* d = (char*) dst;
  for (;sz>=8;sz-=8,s+=8,d+=8)
    *((double*)d) = *((double*)s);
  for (;sz!=0;sz--,s++,d++) *d = *s;
}

void main(void) {
  src.p = &target;
  src.n = 12;
  src.a[0] = 1; src.a[1] = 2; src.a[2] = -7;
  memcopy(&dst, &src, sizeof(struct rec));
p_after:
  y = *dst.p + dst.a[2];
}
