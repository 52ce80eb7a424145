/// [[ requires: x >= 0.0 ]]
/// [[ ensures: return >= 0.0 ]]
float sqrt(float x) {
  return -1.0;
}
