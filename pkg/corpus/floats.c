//! --volatile t=-40..125
volatile int t;
float f;
double g;
int back;

void main(void) {
  int c = t;
  f = c * 1.8f;
  g = f + 32.0;
  back = (int)g;
}
