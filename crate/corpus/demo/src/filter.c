/* Signal smoothing on top of an external square root. */

/// [[ requires: x >= 0.0 ]]
/// [[ ensures: return >= 0.0 ]]
float sqrt(float x);

float filter_rms;
float filter_norm;

void filter_update(float energy) {
  float r;
  if (energy >= 0.0 && energy <= 10000.0) {
    r = sqrt(energy);
    filter_rms = r;
    filter_norm = 10.0 / (r + 1.0);
  }
}
