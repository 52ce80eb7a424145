/* Calibration lookup. */

const int calib[8] = {0, 12, 25, 37, 50, 62, 75, 87};

int table_last;

/// [[ requires: i >= 0 && i <= 7 ]]
int lookup(int i) {
  return calib[i];
}

/// [[ requires: raw >= 0 && raw <= 1000 ]]
/// [[ ensures: return >= 0 && return <= 100 ]]
int clamp_pct(int raw) {
  if (raw > 100) {
    return 101;
  }
  return raw;
}

void table_scan(void) {
  int i;
  int sum = 0;
  for (i = 0; i < 8; i = i + 1) {
    sum = sum + calib[i];
  }
  table_last = sum;
}

/// [[ requires: x >= 0 && x <= 700 ]]
int interp(int x) {
  int k = x / 100;
  int frac = x % 100;
  int lo = calib[k];
  int hi = calib[k + 1];
  return lo + (hi - lo) * frac / 100;
}
