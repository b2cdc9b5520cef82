//! --volatile s=0..255
volatile unsigned char s;
unsigned short hist[8];
unsigned n;

void main(void) {
  while (n < 100) {
    unsigned char x = s;
    hist[x / 32] = hist[x / 32] + 1;
    n++;
  }
}
