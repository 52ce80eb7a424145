/* Sensor conditioning. */

enum Band { BAND_LOW = 0, BAND_MID = 1, BAND_HIGH = 2 };

float sensor_raw;
int sensor_band;
static int samples = 0;

float sensor_gain(float x) {
  if (x > 1.0) {
    return x;
  }
  return 1.0;
}

void sensor_sample(float v) {
  sensor_raw = v;
  if (v > 100.0) {
    sensor_band = BAND_HIGH;
  } else if (v > 10.0) {
    sensor_band = BAND_MID;
  } else {
    sensor_band = BAND_LOW;
  }
  if (samples < 1000) {
    samples = samples + 1;
  }
}

void sensor_reset(void) {
  sensor_band = BAND_LOW;
  sensor_raw = 0.0;
}

static float hist[4] = {0.0, 0.0, 0.0, 0.0};
static int hist_pos = 0;

float sensor_clip(float v, float lim) {
  if (v > lim) {
    return lim;
  }
  if (v < 0.0 - lim) {
    return 0.0 - lim;
  }
  return v;
}

void sensor_push(float v) {
  hist[hist_pos] = sensor_clip(v, 1000.0);
  hist_pos = hist_pos + 1;
  if (hist_pos >= 4) {
    hist_pos = 0;
  }
}

float sensor_mean(void) {
  return (hist[0] + hist[1] + hist[2] + hist[3]) * 0.25;
}

int sensor_valid(void) {
  if (sensor_band == BAND_HIGH && sensor_raw > 5000.0) {
    return 0;
  }
  return 1;
}
