use std::io::{self, Read, Write};

use crate::error::{Error, Result};

/// Bytes before the payload: slot, channel, subchannel, position, length.
pub const PACKET_HEADER_LEN: usize = 4 + 2 + 2 + 4 + 4;

/// One coded packet: the XOR of the subsegment packets at `position`
/// selected by plan row `(channel, subchannel)` in `slot`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodedPacket {
    pub slot: u32,
    /// 1-based; channels above `M` carry redundancy.
    pub channel: u16,
    /// 1-based.
    pub subchannel: u16,
    /// 0-based.
    pub position: u32,
    pub payload: Vec<u8>,
}

impl CodedPacket {
    /// Little-endian header followed by the payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PACKET_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.slot.to_le_bytes());
        out.extend_from_slice(&self.channel.to_le_bytes());
        out.extend_from_slice(&self.subchannel.to_le_bytes());
        out.extend_from_slice(&self.position.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parse one packet from the front of `bytes`; returns it and the bytes
    /// consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < PACKET_HEADER_LEN {
            return Err(Error::MalformedTrace(format!("{} bytes, header needs {PACKET_HEADER_LEN}", bytes.len())));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let u16_at = |i: usize| u16::from_le_bytes(bytes[i..i + 2].try_into().expect("2 bytes"));
        let len = u32_at(12) as usize;
        let end = PACKET_HEADER_LEN + len;
        if bytes.len() < end {
            return Err(Error::MalformedTrace(format!("payload of {len} bytes truncated")));
        }
        let packet = CodedPacket {
            slot: u32_at(0),
            channel: u16_at(4),
            subchannel: u16_at(6),
            position: u32_at(8),
            payload: bytes[PACKET_HEADER_LEN..end].to_vec(),
        };
        Ok((packet, end))
    }
}

/// Write packets back to back in wire format.
pub fn write_trace<W: Write>(mut out: W, packets: &[CodedPacket]) -> io::Result<()> {
    for p in packets {
        out.write_all(&p.to_bytes())?;
    }
    out.flush()
}

/// Read every packet from a trace stream.
pub fn read_trace<R: Read>(mut input: R) -> Result<Vec<CodedPacket>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(|e| Error::MalformedTrace(e.to_string()))?;
    let mut packets = Vec::new();
    let mut rest = bytes.as_slice();
    while !rest.is_empty() {
        let (p, used) = CodedPacket::from_bytes(rest)?;
        packets.push(p);
        rest = &rest[used..];
    }
    Ok(packets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let p =
            CodedPacket { slot: 0x0102_0304, channel: 0x0506, subchannel: 7, position: 9, payload: vec![0xaa, 0xbb] };
        let bytes = p.to_bytes();
        assert_eq!(bytes, vec![4, 3, 2, 1, 6, 5, 7, 0, 9, 0, 0, 0, 2, 0, 0, 0, 0xaa, 0xbb]);
    }

    #[test]
    fn truncated_input_is_rejected() {
        let p = CodedPacket { slot: 1, channel: 1, subchannel: 1, position: 0, payload: vec![1, 2, 3] };
        let bytes = p.to_bytes();
        assert!(CodedPacket::from_bytes(&bytes[..10]).is_err());
        assert!(read_trace(&bytes[..bytes.len() - 1]).is_err());
    }

    proptest! {
        #[test]
        fn trace_round_trip(raw in proptest::collection::vec(
            (any::<u32>(), any::<u16>(), any::<u16>(), any::<u32>(), proptest::collection::vec(any::<u8>(), 0..40)), 0..12)) {
            let packets: Vec<CodedPacket> = raw.into_iter()
                .map(|(slot, channel, subchannel, position, payload)| CodedPacket { slot, channel, subchannel, position, payload })
                .collect();
            let mut buf = Vec::new();
            write_trace(&mut buf, &packets).unwrap();
            prop_assert_eq!(read_trace(buf.as_slice()).unwrap(), packets);
        }
    }
}
