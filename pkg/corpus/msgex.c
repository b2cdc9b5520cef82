//! --volatile sensor=0..1000
struct msgA { int type; int a[2]; };
struct msgB { int type; double x; };

union msg {
  struct { int type; } T;
  struct msgA A;
  struct msgB B;
};

volatile unsigned sensor;

void process(union msg *m) {
  switch (m->T.type) {
  case 0: {
    struct msgA* msga = &(m->A);
    int data = msga->a[0]+1;
  }
  case 1: {
    struct msgB* msgb = &(m->B);
  }
  }
}

void read_sensor_4(unsigned* m) {
  *m = sensor;
}

void main(void) {
  unsigned char buf[sizeof(union msg)];
  int i;
  for (i=0;i<sizeof(buf)/4;i++)
    read_sensor_4((unsigned*)buf+i);
  process((union msg*)buf);
}
