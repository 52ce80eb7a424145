/* Closed-loop control. Consumes sensor.c and bits.c. */

float sensor_gain(float x);
int shift_mask(int s);
extern int sensor_band;

const int band_weight[3] = {1, 4, 9};

float control_out;
int control_mask;

float control_ratio(float x) {
  return 1.0 / sensor_gain(x);
}

int control_weight(void) {
  return band_weight[sensor_band];
}

void control_step(float x, int channel) {
  control_out = control_ratio(x) * 50.0;
  if (channel >= 0 && channel < 8) {
    control_mask = shift_mask(channel);
  }
}

enum CtlState { CTL_OFF = 0, CTL_RAMP = 1, CTL_HOLD = 2, CTL_FAULT = 3 };

static enum CtlState ctl_state = CTL_OFF;
static int ramp = 0;
int control_duty;

void control_fsm(int request, int fault) {
  if (fault != 0) {
    ctl_state = CTL_FAULT;
  }
  switch (ctl_state) {
    case CTL_OFF:
      ramp = 0;
      if (request > 0) {
        ctl_state = CTL_RAMP;
      }
      break;
    case CTL_RAMP:
      if (ramp < 100) {
        ramp = ramp + 5;
      } else {
        ctl_state = CTL_HOLD;
      }
      break;
    case CTL_HOLD:
      if (request <= 0) {
        ctl_state = CTL_OFF;
      }
      break;
    default:
      ramp = 0;
      if (fault == 0 && request == 0) {
        ctl_state = CTL_OFF;
      }
  }
  control_duty = ramp;
}

int control_limit(int demand, int lo, int hi) {
  int out = demand;
  if (lo > hi) {
    return lo;
  }
  if (out < lo) {
    out = lo;
  }
  if (out > hi) {
    out = hi;
  }
  return out;
}
