/* Frame comparison through an external memcmp. */

/// [[ arrayspec: length(ptr1) >= n ]]
/// [[ arrayspec: length(ptr2) >= n ]]
int memcmp(const uint8 *ptr1, const uint8 *ptr2, int n);

uint8 rx_frame[8];
uint8 ref_frame[8];
int frame_same;

void frame_check(int n) {
  if (n >= 1 && n <= 8) {
    frame_same = memcmp(rx_frame, ref_frame, n);
  }
}
