int grid[4][5];
int total;

void main(void) {
  int i, j;
  for (i = 0; i < 4; i++)
    for (j = 0; j < 5; j++)
      grid[i][j] = i + j;
  total = 0;
  for (i = 0; i < 4; i++)
    total = total + grid[i][4];
}
