/* Vehicle speed scaling; limits come from the interface description. */

float speed_kmh;

float speed_scale(float x) {
  return 64000.0 / (x + 1.0);
}

void speed_update(float x) {
  speed_kmh = x * 0.5;
}

const float wheel_circ = 1.95;
static float last_kmh = 0.0;
float speed_accel;

float speed_from_ticks(int ticks, int period_ms) {
  float dist;
  if (ticks < 0 || ticks > 5000) {
    return 0.0;
  }
  if (period_ms < 1 || period_ms > 1000) {
    return 0.0;
  }
  dist = ticks * wheel_circ;
  return dist * 3600.0 / period_ms;
}

void speed_track(int ticks, int period_ms) {
  float v = speed_from_ticks(ticks, period_ms);
  speed_accel = v - last_kmh;
  last_kmh = v;
}
