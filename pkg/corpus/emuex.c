//! --volatile X=0..65535
static union {
  struct { uint8 al, ah, bl, bh; } b;
  struct { uint16 ax, bx; } w;
} regs;

volatile int X;

int main(void)
{
  regs.w.ax = X;
p1:
  if (!regs.b.ah) {
  p2:
    regs.b.bl = regs.b.al;
  p3: ;
  } else {
  p4:
    regs.b.bh = regs.b.al;
  p5: ;
  }
p6:
  regs.b.al = X;
p7:
  return 0;
}
