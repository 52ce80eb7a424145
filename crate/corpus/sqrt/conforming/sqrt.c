/* Newton iteration from above. */

/// [[ requires: x >= 0.0 ]]
/// [[ ensures: return >= 0.0 ]]
float sqrt(float x) {
  float r;
  int i;
  if (x < 1.0) {
    r = 1.0;
  } else {
    r = x;
  }
  for (i = 0; i < 8; i = i + 1) {
    r = 0.5 * (r + x / r);
  }
  return r;
}
