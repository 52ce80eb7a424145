float bar(float x) {
  if (x > 1.0) {
    return x;
  }
  return 1.0;
}
