unsigned char raw[16];
int w;

void main(void) {
  int k;
  for (k = 0; k < 16; k++) raw[k] = k;
  w = *(int*)(raw + 4);
  w = *(int*)(raw + 6);
}
