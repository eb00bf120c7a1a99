"""Audio front end: waveform I/O, frame features, alignments and prosody statistics."""
