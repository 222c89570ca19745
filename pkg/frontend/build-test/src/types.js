/** Wire types mirroring the prediction service's JSON API. */
export {};
