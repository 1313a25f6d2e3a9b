// Drill-down popup model for a selected event: verbatim fields plus
// per-topic mixture bars when the server attached them.

import type { EventJson, TopicJson } from "./types";

export interface ThetaBar {
  label: string;
  value: number;
}

export interface PopupModel {
  title: string;
  fields: [string, string][];
  bars: ThetaBar[];
}

export function popupModel(event: EventJson, topics: TopicJson[] | null): PopupModel {
  const fields: [string, string][] = [
    ["county", event.county],
    ["date", event.date],
    ["event type", event.event_type],
    ["state", event.state],
    ["report", event.report_text],
  ];
  const bars: ThetaBar[] = [];
  if (event.theta) {
    event.theta.forEach((value, i) => {
      const label = topics?.[i] ? `${i}: ${topics[i].label}` : String(i);
      bars.push({ label, value });
    });
  }
  return { title: event.id, fields, bars };
}
