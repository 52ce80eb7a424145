/* Mode machine. initialization() runs once before the cyclic task. */

enum Mode { MODE_OFF = 0, MODE_IDLE = 1, MODE_RUN = 2 };

struct Filter {
  float acc;
  int count;
};

static int mode;
static struct Filter filt;
int seq_out;

/// [[ sequence: init ]]
void initialization(void) {
  mode = MODE_IDLE;
  filt.acc = 0.0;
  filt.count = 0;
}

/// [[ sequence: cyclic ]]
void run(void) {
  if (mode == MODE_IDLE) {
    mode = MODE_RUN;
  }
  if (filt.count < 100) {
    filt.count = filt.count + 1;
  }
  seq_out = mode;
}

/// [[ sequence: cyclic ]]
void seq_filter(float x) {
  if (mode == MODE_RUN && x >= -100.0 && x <= 100.0) {
    filt.acc = filt.acc * 0.9 + x * 0.1;
  }
}

/// [[ sequence: cyclic ]]
void seq_stop(void) {
  mode = MODE_OFF;
}
