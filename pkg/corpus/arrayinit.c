int a[10];
int i;

void main(void) {
  for (i = 0; i < 10; i++)
    a[i] = 0;
p_exit:
  a[0] = i;
}
