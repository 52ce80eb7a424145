/* Bit helpers. */

int shift_mask(int s) {
  return 1 << s;
}

/// [[ requires: hi >= 0 && hi <= 255 ]]
/// [[ requires: lo >= 0 && lo <= 255 ]]
int pack(int hi, int lo) {
  return hi * 256 + lo;
}

int bit_count(int v) {
  int n = 0;
  int i;
  if (v < 0) {
    return 0;
  }
  for (i = 0; i < 31; i = i + 1) {
    if (v % 2 == 1) {
      n = n + 1;
    }
    v = v / 2;
  }
  return n;
}

int low_byte(int v) {
  if (v < 0) {
    v = 0 - (v + 1);
  }
  return v % 256;
}
