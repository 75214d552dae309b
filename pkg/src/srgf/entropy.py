"""Adaptive binary-renormalised arithmetic coding.

One integer coder backs every compressed payload in the container: quantised
transform coefficients, per-label disparities, class flags, segmentation
events and reference-image residuals. Models are adaptive frequency tables
over a Fenwick tree so cumulative lookups stay O(log alphabet); all state is
integer, which makes encode/decode bit-exact on any platform.
"""

from __future__ import annotations

from .errors import StreamError

STATE_BITS = 32
FULL = 1 << STATE_BITS
HALF = FULL >> 1
QUARTER = FULL >> 2
MAX_TOTAL = 1 << 16

# Coefficient alphabet: magnitudes up to 255 map directly onto symbols,
# anything larger is an escape followed by a fixed-width signed tail.
VALUE_BOUND = 255
ESCAPE = 2 * VALUE_BOUND + 1
COEFF_ALPHABET = ESCAPE + 1
TAIL_BITS = 32


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, bit: int) -> None:
        self._acc = (self._acc << 1) | bit
        self._nbits += 1
        if self._nbits == 8:
            self._bytes.append(self._acc)
            self._acc = 0
            self._nbits = 0

    def getvalue(self) -> bytes:
        """Close out the stream, zero-padding the final byte."""
        if self._nbits:
            self._bytes.append(self._acc << (8 - self._nbits))
            self._acc = 0
            self._nbits = 0
        return bytes(self._bytes)


class BitReader:
    """Bit reader that yields zeros past the end of the buffer.

    The arithmetic decoder's final symbols depend on bits the encoder never
    wrote; zero extension matches the encoder's termination convention.
    """

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._acc = 0
        self._nbits = 0

    def read(self) -> int:
        if self._nbits == 0:
            if self._pos < len(self._data):
                self._acc = self._data[self._pos]
                self._pos += 1
                self._nbits = 8
            else:
                return 0
        self._nbits -= 1
        return (self._acc >> self._nbits) & 1


class AdaptiveModel:
    """Frequency table with escape-free adaptive counts.

    Counts start at one and grow by ``increment`` per coded symbol; when the
    total passes ``limit`` every count is halved (floored at one), so the
    model keeps tracking local statistics. ``increment`` is large relative
    to the initial counts so that skewed sources converge quickly.
    """

    def __init__(self, alphabet: int, increment: int = 32, limit: int = MAX_TOTAL):
        if alphabet < 1:
            raise ValueError("alphabet must be positive")
        self.n = alphabet
        self.increment = increment
        self.limit = min(limit, MAX_TOTAL)
        self._counts = [1] * alphabet
        self._rebuild()

    def _rebuild(self) -> None:
        n = self.n
        tree = list(self._counts)
        for i in range(1, n + 1):
            j = i + (i & -i)
            if j <= n:
                tree[j - 1] += tree[i - 1]
        self._tree = tree
        self.total = sum(self._counts)

    def _prefix(self, i: int) -> int:
        s = 0
        tree = self._tree
        while i > 0:
            s += tree[i - 1]
            i -= i & -i
        return s

    def interval(self, symbol: int) -> tuple[int, int, int]:
        lo = self._prefix(symbol)
        return lo, lo + self._counts[symbol], self.total

    def locate(self, value: int) -> tuple[int, int, int, int]:
        """Symbol whose cumulative interval contains ``value``."""
        idx = 0
        rem = value
        tree = self._tree
        n = self.n
        bit = 1
        while (bit << 1) <= n:
            bit <<= 1
        while bit:
            nxt = idx + bit
            if nxt <= n and tree[nxt - 1] <= rem:
                idx = nxt
                rem -= tree[nxt - 1]
            bit >>= 1
        lo = value - rem
        return idx, lo, lo + self._counts[idx], self.total

    def update(self, symbol: int) -> None:
        inc = self.increment
        self._counts[symbol] += inc
        self.total += inc
        i = symbol + 1
        tree = self._tree
        n = self.n
        while i <= n:
            tree[i - 1] += inc
            i += i & -i
        if self.total > self.limit:
            self._counts = [max(1, c >> 1) for c in self._counts]
            self._rebuild()


class ArithmeticEncoder:
    def __init__(self):
        self._out = BitWriter()
        self._low = 0
        self._high = FULL - 1
        self._pending = 0

    def _emit(self, bit: int) -> None:
        self._out.write(bit)
        other = bit ^ 1
        while self._pending:
            self._out.write(other)
            self._pending -= 1

    def _narrow(self, cum_lo: int, cum_hi: int, total: int) -> None:
        span = self._high - self._low + 1
        self._high = self._low + cum_hi * span // total - 1
        self._low = self._low + cum_lo * span // total
        while True:
            if self._high < HALF:
                self._emit(0)
            elif self._low >= HALF:
                self._emit(1)
                self._low -= HALF
                self._high -= HALF
            elif self._low >= QUARTER and self._high < HALF + QUARTER:
                self._pending += 1
                self._low -= QUARTER
                self._high -= QUARTER
            else:
                return
            self._low <<= 1
            self._high = (self._high << 1) | 1

    def encode(self, model: AdaptiveModel, symbol: int) -> None:
        lo, hi, total = model.interval(symbol)
        self._narrow(lo, hi, total)
        model.update(symbol)

    def encode_bits(self, value: int, nbits: int) -> None:
        """Code ``nbits`` raw bits at a fixed uniform split (bypass)."""
        for shift in range(nbits - 1, -1, -1):
            bit = (value >> shift) & 1
            self._narrow(bit, bit + 1, 2)

    def finish(self) -> bytes:
        self._pending += 1
        self._emit(0 if self._low < QUARTER else 1)
        return self._out.getvalue()


class ArithmeticDecoder:
    def __init__(self, data: bytes):
        self._in = BitReader(data)
        self._low = 0
        self._high = FULL - 1
        self._code = 0
        for _ in range(STATE_BITS):
            self._code = (self._code << 1) | self._in.read()

    def _renorm(self) -> None:
        while True:
            if self._high < HALF:
                pass
            elif self._low >= HALF:
                self._low -= HALF
                self._high -= HALF
                self._code -= HALF
            elif self._low >= QUARTER and self._high < HALF + QUARTER:
                self._low -= QUARTER
                self._high -= QUARTER
                self._code -= QUARTER
            else:
                return
            self._low <<= 1
            self._high = (self._high << 1) | 1
            self._code = (self._code << 1) | self._in.read()

    def decode(self, model: AdaptiveModel) -> int:
        span = self._high - self._low + 1
        total = model.total
        value = ((self._code - self._low + 1) * total - 1) // span
        if not 0 <= value < total:
            raise StreamError("arithmetic decoder state out of range", section="entropy")
        symbol, lo, hi, total = model.locate(value)
        self._high = self._low + hi * span // total - 1
        self._low = self._low + lo * span // total
        self._renorm()
        model.update(symbol)
        return symbol

    def decode_bits(self, nbits: int) -> int:
        value = 0
        for _ in range(nbits):
            span = self._high - self._low + 1
            v = ((self._code - self._low + 1) * 2 - 1) // span
            bit = 1 if v else 0
            self._high = self._low + (bit + 1) * span // 2 - 1
            self._low = self._low + bit * span // 2
            self._renorm()
            value = (value << 1) | bit
        return value


def encode_value(enc: ArithmeticEncoder, model: AdaptiveModel, value: int) -> None:
    """Code a signed integer with the magnitude-escape convention."""
    if -VALUE_BOUND <= value <= VALUE_BOUND:
        enc.encode(model, value + VALUE_BOUND)
    else:
        if not -(1 << (TAIL_BITS - 1)) <= value < (1 << (TAIL_BITS - 1)):
            raise StreamError(f"coefficient {value} exceeds the escape tail width",
                              section="entropy")
        enc.encode(model, ESCAPE)
        enc.encode_bits(value & ((1 << TAIL_BITS) - 1), TAIL_BITS)


def decode_value(dec: ArithmeticDecoder, model: AdaptiveModel) -> int:
    symbol = dec.decode(model)
    if symbol != ESCAPE:
        return symbol - VALUE_BOUND
    raw = dec.decode_bits(TAIL_BITS)
    if raw >= 1 << (TAIL_BITS - 1):
        raw -= 1 << TAIL_BITS
    return raw


def encode_values(values) -> bytes:
    """One-shot signed-integer stream with a single adaptive model."""
    enc = ArithmeticEncoder()
    model = AdaptiveModel(COEFF_ALPHABET)
    for v in values:
        encode_value(enc, model, int(v))
    return enc.finish()


def decode_values(data: bytes, count: int) -> list[int]:
    dec = ArithmeticDecoder(data)
    model = AdaptiveModel(COEFF_ALPHABET)
    return [decode_value(dec, model) for _ in range(count)]


def encode_symbols(symbols, alphabet: int) -> bytes:
    """One-shot bounded-alphabet stream with a single adaptive model."""
    enc = ArithmeticEncoder()
    model = AdaptiveModel(alphabet)
    for s in symbols:
        s = int(s)
        if not 0 <= s < alphabet:
            raise ValueError(f"symbol {s} outside alphabet of size {alphabet}")
        enc.encode(model, s)
    return enc.finish()


def decode_symbols(data: bytes, count: int, alphabet: int) -> list[int]:
    dec = ArithmeticDecoder(data)
    model = AdaptiveModel(alphabet)
    out = []
    for _ in range(count):
        s = dec.decode(model)
        if s >= alphabet:
            raise StreamError("decoded symbol outside alphabet", section="entropy")
        out.append(s)
    return out
